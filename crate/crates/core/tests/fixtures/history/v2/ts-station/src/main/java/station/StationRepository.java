package station;

import org.springframework.stereotype.Repository;

@Repository
public interface StationRepository {
    @Query("select s from Station s where s.id = ?1")
    Station findByStationId(String id);

    int countAll();
}
