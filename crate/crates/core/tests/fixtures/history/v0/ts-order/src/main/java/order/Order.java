package order;

import javax.persistence.Entity;

@Entity
public class Order {
    private String id;
    private String from;
    private String to;
    private double price;
}
