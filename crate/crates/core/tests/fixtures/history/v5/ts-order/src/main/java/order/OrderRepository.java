package order;

import org.springframework.stereotype.Repository;

@Repository
public interface OrderRepository {
    Order findByOrderId(String id);
}
